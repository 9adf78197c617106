#pragma once

#include "pipemdp/kernels.hpp"

namespace pipemdp::kernels {

// Defined in avx2.cpp when the target is x86-64; returns nullptr elsewhere.
const KernelTable* avx2_table();

}  // namespace pipemdp::kernels
