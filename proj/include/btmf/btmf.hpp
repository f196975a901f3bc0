#pragma once

#include "btmf/error.hpp"
#include "btmf/random.hpp"
#include "btmf/linalg.hpp"
#include "btmf/distributions.hpp"
#include "btmf/model.hpp"
#include "btmf/posterior.hpp"
#include "btmf/gibbs.hpp"
#include "btmf/forecast.hpp"
#include "btmf/incremental.hpp"
#include "btmf/scenarios.hpp"
#include "btmf/io.hpp"
#include "btmf/synthetic.hpp"
#include "btmf/sweep.hpp"
#include "btmf/config.hpp"
#include "btmf/report.hpp"
