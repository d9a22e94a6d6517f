// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "raremut/acceptance.hpp"
#include "raremut/config.hpp"
#include "raremut/csv.hpp"
#include "raremut/fitness.hpp"
#include "raremut/flow.hpp"
#include "raremut/gamma_sweep.hpp"
#include "raremut/jump_process.hpp"
#include "raremut/kolmogorov.hpp"
#include "raremut/mesh.hpp"
#include "raremut/ode.hpp"
#include "raremut/rng.hpp"
#include "raremut/simplex.hpp"
#include "raremut/two_species.hpp"
