#pragma once

#include "orbitkit/algebra.hpp"
#include "orbitkit/catalog.hpp"
#include "orbitkit/compose.hpp"
#include "orbitkit/distribution.hpp"
#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/flow.hpp"
#include "orbitkit/format.hpp"
#include "orbitkit/integrator.hpp"
#include "orbitkit/orbit.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/polynomial.hpp"
#include "orbitkit/random.hpp"
#include "orbitkit/space.hpp"
