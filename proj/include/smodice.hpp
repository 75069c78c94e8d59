// Copyright 2026 The smodice-tabular Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "smodice/dataset.hpp"
#include "smodice/discriminator.hpp"
#include "smodice/error.hpp"
#include "smodice/eval.hpp"
#include "smodice/fdiv.hpp"
#include "smodice/gridworld.hpp"
#include "smodice/io.hpp"
#include "smodice/mdp.hpp"
#include "smodice/pipeline.hpp"
#include "smodice/random.hpp"
#include "smodice/smodice.hpp"
