#pragma once

#include "csphere/circle_map.hpp"
#include "csphere/contact_map.hpp"
#include "csphere/experiment.hpp"
#include "csphere/invariant_hamiltonian.hpp"
#include "csphere/kdtree.hpp"
#include "csphere/moebius.hpp"
#include "csphere/parallel.hpp"
#include "csphere/sphere.hpp"
#include "csphere/translated_points.hpp"
