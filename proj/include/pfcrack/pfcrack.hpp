// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_PFCRACK_HPP
#define PFCRACK_PFCRACK_HPP

#include "pfcrack/types.hpp"
#include "pfcrack/mesh.hpp"
#include "pfcrack/fe_space.hpp"
#include "pfcrack/vtk.hpp"
#include "pfcrack/elasticity.hpp"
#include "pfcrack/box_qp.hpp"
#include "pfcrack/phasefield.hpp"
#include "pfcrack/pathfollowing.hpp"
#include "pfcrack/lefm.hpp"
#include "pfcrack/crackinit.hpp"
#include "pfcrack/bench.hpp"

#endif
