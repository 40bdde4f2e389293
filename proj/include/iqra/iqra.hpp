#pragma once

#include "iqra/core.hpp"
#include "iqra/qr_solver.hpp"
#include "iqra/pava.hpp"
#include "iqra/vst.hpp"
#include "iqra/postprocess.hpp"
#include "iqra/metrics.hpp"
#include "iqra/ingest.hpp"
#include "iqra/backtest.hpp"
#include "iqra/evaluate.hpp"
#include "iqra/bench.hpp"
