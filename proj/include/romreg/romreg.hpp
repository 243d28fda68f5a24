#pragma once

#include "romreg/core.hpp"
#include "romreg/io.hpp"
#include "romreg/pipeline.hpp"
#include "romreg/reduction.hpp"
#include "romreg/registration.hpp"
#include "romreg/regression.hpp"
#include "romreg/snapshots.hpp"
