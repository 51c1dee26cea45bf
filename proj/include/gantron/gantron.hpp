// gantron/gantron.hpp

// Copyright 2026  GANtron Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "gantron/autograd.hpp"
#include "gantron/common.hpp"
#include "gantron/corpus.hpp"
#include "gantron/discriminator.hpp"
#include "gantron/evaluation.hpp"
#include "gantron/generator.hpp"
#include "gantron/groups.hpp"
#include "gantron/inference.hpp"
#include "gantron/losses.hpp"
#include "gantron/mel.hpp"
#include "gantron/nn.hpp"
#include "gantron/optimizer.hpp"
#include "gantron/plot.hpp"
#include "gantron/rng.hpp"
#include "gantron/runconfig.hpp"
#include "gantron/tensor.hpp"
#include "gantron/trainer.hpp"
#include "gantron/wav.hpp"
