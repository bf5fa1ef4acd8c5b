#pragma once

#include "odtrec/core.hpp"
#include "odtrec/index_sets.hpp"
#include "odtrec/tensor.hpp"
#include "odtrec/odt_io.hpp"
#include "odtrec/random.hpp"
#include "odtrec/synth.hpp"
#include "odtrec/selection.hpp"
#include "odtrec/counting.hpp"
#include "odtrec/coupled.hpp"
#include "odtrec/stage1.hpp"
#include "odtrec/stage2.hpp"
#include "odtrec/spectral.hpp"
#include "odtrec/feasibility.hpp"
#include "odtrec/pipeline.hpp"
#include "odtrec/experiments.hpp"
