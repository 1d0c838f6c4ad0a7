#pragma once

#include "gpushare/cluster.hpp"
#include "gpushare/commands.hpp"
#include "gpushare/errors.hpp"
#include "gpushare/fit.hpp"
#include "gpushare/io.hpp"
#include "gpushare/job.hpp"
#include "gpushare/pair_sched.hpp"
#include "gpushare/perf_model.hpp"
#include "gpushare/policies.hpp"
#include "gpushare/profiles.hpp"
#include "gpushare/report.hpp"
#include "gpushare/simulator.hpp"
#include "gpushare/trace.hpp"
