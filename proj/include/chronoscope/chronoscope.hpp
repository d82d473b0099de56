#pragma once

#include "chronoscope/correlate.hpp"
#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/hash.hpp"
#include "chronoscope/ica.hpp"
#include "chronoscope/insights.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/knn.hpp"
#include "chronoscope/linalg.hpp"
#include "chronoscope/lle.hpp"
#include "chronoscope/matrix.hpp"
#include "chronoscope/parallel.hpp"
#include "chronoscope/pca.hpp"
#include "chronoscope/plot.hpp"
#include "chronoscope/rng.hpp"
#include "chronoscope/synthetic.hpp"
