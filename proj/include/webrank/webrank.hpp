#pragma once

#include "webrank/bpnn.hpp"
#include "webrank/corpus.hpp"
#include "webrank/errors.hpp"
#include "webrank/features.hpp"
#include "webrank/priority_content.hpp"
#include "webrank/priority_time.hpp"
#include "webrank/rank_eval.hpp"
#include "webrank/retrieval.hpp"
#include "webrank/semantics.hpp"
#include "webrank/textprep.hpp"
