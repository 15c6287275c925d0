#pragma once

#include "holocat/errors.hpp"
#include "holocat/linalg.hpp"
#include "holocat/fockspace.hpp"
#include "holocat/path.hpp"
#include "holocat/liouvillian.hpp"
#include "holocat/catcode.hpp"
#include "holocat/gates.hpp"
#include "holocat/holonomy.hpp"
#include "holocat/harness.hpp"
