// Copyright 2026 The hcomb Authors. All Rights Reserved.
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

#include "hcomb/audio.hpp"
#include "hcomb/comb_bank.hpp"
#include "hcomb/enhance.hpp"
#include "hcomb/error.hpp"
#include "hcomb/f0_estimator.hpp"
#include "hcomb/f0_grid.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"
#include "hcomb/matrix_io.hpp"
#include "hcomb/mel.hpp"
#include "hcomb/metrics.hpp"
#include "hcomb/stft.hpp"
