#pragma once

#include "mirank/errors.hpp"
#include "mirank/random.hpp"
#include "mirank/core.hpp"
#include "mirank/features.hpp"
#include "mirank/models.hpp"
#include "mirank/training.hpp"
#include "mirank/ranker.hpp"
#include "mirank/simgen.hpp"
#include "mirank/eval.hpp"
#include "mirank/persistence.hpp"
