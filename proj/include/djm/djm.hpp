#ifndef DJM_DJM_HPP
#define DJM_DJM_HPP

#include "djm/precision.hpp"
#include "djm/algebra.hpp"
#include "djm/iterate.hpp"
#include "djm/oracle.hpp"
#include "djm/boussinesq.hpp"
#include "djm/cli.hpp"

#endif
