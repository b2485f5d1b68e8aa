#pragma once

#include "core.hpp"
#include "similarity.hpp"
#include "features.hpp"
#include "synth.hpp"
#include "emitter.hpp"
#include "classify/metrics.hpp"
#include "classify/hsa.hpp"
#include "classify/baseline.hpp"
#include "classify/evaluate.hpp"
#include "classify/bundle.hpp"
#include "collectord.hpp"
#include "demo.hpp"
