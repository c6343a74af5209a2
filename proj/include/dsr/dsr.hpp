// Copyright (c) the dsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dsr/adapter.hpp"
#include "dsr/degradations.hpp"
#include "dsr/denoiser.hpp"
#include "dsr/descriptor.hpp"
#include "dsr/gradcheck.hpp"
#include "dsr/netpbm.hpp"
#include "dsr/ops.hpp"
#include "dsr/rng.hpp"
#include "dsr/sani.hpp"
#include "dsr/schedule.hpp"
#include "dsr/tensor.hpp"
#include "dsr/training.hpp"
#include "dsr/weights_io.hpp"
