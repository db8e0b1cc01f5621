#include "snnas/cli.hpp"

int main(int argc, char** argv) { return snnas::cli::run(argc, argv); }
