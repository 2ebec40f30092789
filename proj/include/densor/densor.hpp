#pragma once

#include "densor/alert.hpp"
#include "densor/detect.hpp"
#include "densor/io.hpp"
#include "densor/oracle.hpp"
#include "densor/ordering.hpp"
#include "densor/sparse_tensor.hpp"
#include "densor/stream.hpp"
#include "densor/types.hpp"
