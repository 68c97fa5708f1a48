/* Copyright 2026 The soupkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "soupkit/csv.hpp"
#include "soupkit/ensemble.hpp"
#include "soupkit/error.hpp"
#include "soupkit/inference.hpp"
#include "soupkit/io.hpp"
#include "soupkit/linalg.hpp"
#include "soupkit/manifest.hpp"
#include "soupkit/metrics.hpp"
#include "soupkit/parallel.hpp"
#include "soupkit/soup.hpp"
#include "soupkit/synthetic.hpp"
#include "soupkit/tensor_store.hpp"
