#pragma once

#include "lxper/baselines.hpp"
#include "lxper/corpus.hpp"
#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/model.hpp"
#include "lxper/pipeline.hpp"
#include "lxper/report.hpp"
#include "lxper/selection.hpp"
#include "lxper/textproc.hpp"
