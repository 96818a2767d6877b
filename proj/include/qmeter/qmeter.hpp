// Copyright 2026 The qmeter Authors
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

// Umbrella header for the numerical modules.

#ifndef QMETER_QMETER_HPP
#define QMETER_QMETER_HPP

#include "qmeter/core.hpp"
#include "qmeter/io.hpp"
#include "qmeter/measure.hpp"
#include "qmeter/parallel.hpp"
#include "qmeter/rng.hpp"
#include "qmeter/seq.hpp"
#include "qmeter/wva.hpp"

#endif  // QMETER_QMETER_HPP
