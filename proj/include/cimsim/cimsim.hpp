#pragma once

#include "cimsim/adc.hpp"
#include "cimsim/analog.hpp"
#include "cimsim/chain.hpp"
#include "cimsim/config.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/format.hpp"
#include "cimsim/inference.hpp"
#include "cimsim/metrology.hpp"
#include "cimsim/report.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/scheduler.hpp"
#include "cimsim/search_tree.hpp"
