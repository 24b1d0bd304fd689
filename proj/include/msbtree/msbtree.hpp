#pragma once

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/matrix.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/mst.hpp"
#include "msbtree/oracle.hpp"
#include "msbtree/sinkhorn.hpp"
#include "msbtree/tensor.hpp"
#include "msbtree/trees.hpp"
#include "msbtree/verify.hpp"
