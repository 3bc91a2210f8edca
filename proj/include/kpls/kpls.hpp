/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 *
 * Umbrella header: kernel PLS regression by conjugate gradients on the
 * normal equation, with perturbation-bound and complexity-based early
 * stopping, an exactly computable population oracle, and JSON/CSV plumbing.
 */
#ifndef KPLS_KPLS_HPP_
#define KPLS_KPLS_HPP_

#include "kpls/cg.hpp"
#include "kpls/dataset.hpp"
#include "kpls/errors.hpp"
#include "kpls/experiment.hpp"
#include "kpls/io.hpp"
#include "kpls/kernel.hpp"
#include "kpls/krylov.hpp"
#include "kpls/monitor.hpp"
#include "kpls/population.hpp"
#include "kpls/rkhs.hpp"

#endif  // KPLS_KPLS_HPP_
