#pragma once

#include "causalcbm/baseline.hpp"
#include "causalcbm/common.hpp"
#include "causalcbm/dataset.hpp"
#include "causalcbm/expert_matrix.hpp"
#include "causalcbm/explain.hpp"
#include "causalcbm/learning.hpp"
#include "causalcbm/metrics.hpp"
#include "causalcbm/noisy_or.hpp"
#include "causalcbm/pipeline.hpp"
#include "causalcbm/random.hpp"
#include "causalcbm/serialize.hpp"
#include "causalcbm/synthetic.hpp"
#include "causalcbm/vocabulary.hpp"
