#pragma once

#include "songemb/config.hpp"
#include "songemb/corpus.hpp"
#include "songemb/embedding_io.hpp"
#include "songemb/error.hpp"
#include "songemb/evaluation.hpp"
#include "songemb/gp.hpp"
#include "songemb/hardneg.hpp"
#include "songemb/hpo.hpp"
#include "songemb/metrics.hpp"
#include "songemb/neighbors.hpp"
#include "songemb/popularity.hpp"
#include "songemb/rng.hpp"
#include "songemb/sgns.hpp"
#include "songemb/stats.hpp"
#include "songemb/synth.hpp"
