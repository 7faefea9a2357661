/*
 * Copyright 2026 The optpower Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OPTPOWER_OPTPOWER_HPP
#define OPTPOWER_OPTPOWER_HPP

#include "optpower/pricing.hpp"
#include "optpower/tick.hpp"
#include "optpower/kernel.hpp"
#include "optpower/gaps.hpp"
#include "optpower/isoqos.hpp"
#include "optpower/feed.hpp"
#include "optpower/metrics.hpp"

#endif // OPTPOWER_OPTPOWER_HPP
