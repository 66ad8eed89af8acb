#pragma once

#include "popbands/arima.hpp"
#include "popbands/bridge.hpp"
#include "popbands/config.hpp"
#include "popbands/csv.hpp"
#include "popbands/errors.hpp"
#include "popbands/mathfn.hpp"
#include "popbands/pipeline.hpp"
#include "popbands/report.hpp"
#include "popbands/series.hpp"
#include "popbands/simulate.hpp"
#include "popbands/stats.hpp"
#include "popbands/svg.hpp"
#include "popbands/trend.hpp"
#include "popbands/version.hpp"
