#pragma once

#include "fieldforge/alphabet.hpp"
#include "fieldforge/error.hpp"
#include "fieldforge/exact.hpp"
#include "fieldforge/gain.hpp"
#include "fieldforge/gibbs.hpp"
#include "fieldforge/iis.hpp"
#include "fieldforge/induction.hpp"
#include "fieldforge/model.hpp"
#include "fieldforge/model_io.hpp"
#include "fieldforge/pattern.hpp"
#include "fieldforge/rng.hpp"
#include "fieldforge/spelling.hpp"
