#pragma once

#include "qrect/analysis.hpp"
#include "qrect/ccbp.hpp"
#include "qrect/cloud.hpp"
#include "qrect/config.hpp"
#include "qrect/error.hpp"
#include "qrect/generators.hpp"
#include "qrect/jacobi.hpp"
#include "qrect/linalg.hpp"
#include "qrect/param.hpp"
#include "qrect/plane.hpp"
#include "qrect/plane_fit.hpp"
#include "qrect/poincare.hpp"
#include "qrect/spatial_index.hpp"
