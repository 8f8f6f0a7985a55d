#pragma once

#include "changeset.hpp"
#include "constraint.hpp"
#include "diagnostics.hpp"
#include "invariants.hpp"
#include "isomorphism.hpp"
#include "model.hpp"
#include "parser.hpp"
#include "render.hpp"
#include "sim.hpp"
#include "transform.hpp"
#include "validator.hpp"
