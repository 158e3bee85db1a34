#pragma once

// Umbrella header.

#include "isound/clustering.hpp"
#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"
#include "isound/features.hpp"
#include "isound/fft.hpp"
#include "isound/gridmap.hpp"
#include "isound/jacobi.hpp"
#include "isound/kmeans.hpp"
#include "isound/matrix.hpp"
#include "isound/parallel.hpp"
#include "isound/pca.hpp"
#include "isound/pipeline.hpp"
#include "isound/rng.hpp"
#include "isound/silhouette.hpp"
#include "isound/spectrum.hpp"
#include "isound/synth.hpp"
#include "isound/version.hpp"
#include "isound/wav.hpp"
