// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/calibrate.hpp>
#include <ldes/core.hpp>
#include <ldes/error.hpp>
#include <ldes/io.hpp>
#include <ldes/mapgen.hpp>
#include <ldes/parallel.hpp>
#include <ldes/params_file.hpp>
#include <ldes/projection.hpp>
#include <ldes/resample.hpp>
#include <ldes/transform.hpp>
