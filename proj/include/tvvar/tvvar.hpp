#pragma once

// Everything except the command-line layer (tvvar/cli.hpp), which also needs nlohmann/json.
#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/estimate.hpp"
#include "tvvar/forecast.hpp"
#include "tvvar/io.hpp"
#include "tvvar/irf.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/montecarlo.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/regressors.hpp"
#include "tvvar/rng.hpp"
#include "tvvar/select.hpp"
#include "tvvar/series.hpp"
#include "tvvar/simulate.hpp"
#include "tvvar/stats.hpp"
#include "tvvar/trend.hpp"
#include "tvvar/version.hpp"
