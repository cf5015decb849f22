#pragma once

#include "risksample/classifier.hpp"
#include "risksample/dataset.hpp"
#include "risksample/featurizer.hpp"
#include "risksample/harness.hpp"
#include "risksample/risk.hpp"
#include "risksample/sampler.hpp"
#include "risksample/synth.hpp"
#include "risksample/util.hpp"
#include "risksample/verification.hpp"
