#pragma once

#include "supclust/clustering.hpp"
#include "supclust/common.hpp"
#include "supclust/dataset.hpp"
#include "supclust/harness.hpp"
#include "supclust/pool.hpp"
#include "supclust/random.hpp"
#include "supclust/scoring.hpp"
#include "supclust/strategies.hpp"
