#pragma once

#include "fgen/audio_io.hpp"
#include "fgen/checkpoint.hpp"
#include "fgen/fft.hpp"
#include "fgen/gradcheck.hpp"
#include "fgen/graph.hpp"
#include "fgen/lstm.hpp"
#include "fgen/models.hpp"
#include "fgen/ops.hpp"
#include "fgen/optim.hpp"
#include "fgen/pipeline.hpp"
#include "fgen/rng.hpp"
#include "fgen/spectral.hpp"
#include "fgen/tensor.hpp"
#include "fgen/training.hpp"
