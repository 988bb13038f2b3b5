// Copyright 2026 The Partial-EL Authors.
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


// Umbrella header.

#pragma once

#include "partial_el/corpus.hpp"
#include "partial_el/embed.hpp"
#include "partial_el/error.hpp"
#include "partial_el/eval.hpp"
#include "partial_el/io.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/lm.hpp"
#include "partial_el/parallel.hpp"
#include "partial_el/paradigms.hpp"
#include "partial_el/pipeline.hpp"
#include "partial_el/redemption.hpp"
#include "partial_el/synth.hpp"
#include "partial_el/tagger.hpp"
#include "partial_el/text.hpp"
#include "partial_el/trie.hpp"
