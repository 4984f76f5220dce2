#pragma once

// Convenience include for the whole library.

#include "reidx/core.hpp"
#include "reidx/descriptor.hpp"
#include "reidx/error.hpp"
#include "reidx/evaluation.hpp"
#include "reidx/io.hpp"
#include "reidx/part_geometry.hpp"
#include "reidx/pca.hpp"
#include "reidx/retrieval.hpp"
#include "reidx/synthetic.hpp"
#include "reidx/tdc.hpp"
