#pragma once

#include "snnas/arch.hpp"
#include "snnas/batch.hpp"
#include "snnas/config.hpp"
#include "snnas/fitness.hpp"
#include "snnas/imc.hpp"
#include "snnas/quant.hpp"
#include "snnas/report.hpp"
#include "snnas/search.hpp"
#include "snnas/spike_engine.hpp"
