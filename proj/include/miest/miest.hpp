#pragma once

// Umbrella header: pulls in the full estimation toolkit.

#include "miest/bench.hpp"
#include "miest/core.hpp"
#include "miest/ensemble.hpp"
#include "miest/errors.hpp"
#include "miest/inference.hpp"
#include "miest/io.hpp"
#include "miest/kde.hpp"
#include "miest/parallel.hpp"
#include "miest/plugin.hpp"
#include "miest/rng.hpp"
#include "miest/serialize.hpp"
#include "miest/synthetic.hpp"
