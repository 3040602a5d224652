#pragma once

#include "wasep/params.hpp"
#include "wasep/rng.hpp"
#include "wasep/process.hpp"
#include "wasep/hopfcole.hpp"
#include "wasep/drift.hpp"
#include "wasep/kernel.hpp"
#include "wasep/stats.hpp"
#include "wasep/ensemble.hpp"
#include "wasep/io.hpp"
#include "wasep/config.hpp"
