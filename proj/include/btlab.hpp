#pragma once

#include "btlab/core.hpp"
#include "btlab/defenses.hpp"
#include "btlab/eval.hpp"
#include "btlab/features.hpp"
#include "btlab/forest.hpp"
#include "btlab/ingest.hpp"
#include "btlab/matrix.hpp"
#include "btlab/packs.hpp"
#include "btlab/rng.hpp"
#include "btlab/stream.hpp"
#include "btlab/synth.hpp"
#include "btlab/experiments.hpp"
#include "btlab/cli.hpp"
