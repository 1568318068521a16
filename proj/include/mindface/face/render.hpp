#pragma once

#include "mindface/face/generator.hpp"

#include <string>

namespace mindface::face {

struct FaceImage {
  std::string svg;
  FaceParams params;
  Latent latent;
};

// Procedural SVG 1.1 face. Geometry inside <g id="identity"> is an affine
// function of the identity parameters only; the nuisance parameters drive
// just the background fill, the scene transform and a brightness filter.
std::string render_svg(const FaceParams& params);

FaceImage render(const FaceParams& params);
FaceImage generate(const Generator& generator, const Latent& latent);

}  // namespace mindface::face
