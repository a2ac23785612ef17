#pragma once

#include "graspforge/core.hpp"
#include "graspforge/types.hpp"
#include "graspforge/geometry.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/nnls.hpp"
#include "graspforge/contact.hpp"
#include "graspforge/force_qp.hpp"
#include "graspforge/synthesis.hpp"
#include "graspforge/selection.hpp"
#include "graspforge/demo.hpp"
#include "graspforge/dataset.hpp"
#include "graspforge/cli.hpp"
