#pragma once

// Everything, for tools and demos.
#include "qdlab/errors.hpp"
#include "qdlab/tolerances.hpp"
#include "qdlab/groups.hpp"
#include "qdlab/lattice.hpp"
#include "qdlab/linop.hpp"
#include "qdlab/qdmodel.hpp"
#include "qdlab/ribbon.hpp"
#include "qdlab/gadget.hpp"
#include "qdlab/bloch.hpp"
#include "qdlab/harness.hpp"
