#pragma once

#include "giht/core.hpp"
#include "giht/experiments.hpp"
#include "giht/groups.hpp"
#include "giht/io.hpp"
#include "giht/objective.hpp"
#include "giht/parallel.hpp"
#include "giht/project.hpp"
#include "giht/rng.hpp"
#include "giht/solver.hpp"
#include "giht/synth.hpp"
