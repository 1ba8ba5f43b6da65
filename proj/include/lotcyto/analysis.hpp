#pragma once

#include "lotcyto/classify.hpp"
#include "lotcyto/mst.hpp"
#include "lotcyto/pca.hpp"
#include "lotcyto/silhouette.hpp"
