#include "mindface/face/render.hpp"

#include <cstdio>
#include <sstream>

namespace mindface::face {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

constexpr double kCenterX = 128.0;
constexpr double kCenterY = 132.0;

}  // namespace

std::string render_svg(const FaceParams& p) {
  using F = Feature;
  const double head_rx = 58.0 + 30.0 * p[F::FaceWidth];
  const double head_ry = 76.0 + 30.0 * p[F::FaceHeight];
  const double eye_y = 122.0 - 26.0 * p[F::EyeHeight];
  const double eye_dx = 16.0 + 22.0 * p[F::EyeSpacing];
  const double eye_r = 4.0 + 7.0 * p[F::EyeSize];
  const double brow_y = eye_y - 16.0 - 5.0 * p[F::EyeSize];
  const double brow_tilt = 10.0 * (p[F::EyebrowAngle] - 0.5);
  const double brow_w = 1.5 + 4.5 * p[F::EyebrowThickness];
  const double nose_top = eye_y + 6.0;
  const double nose_bottom = eye_y + 22.0 + 26.0 * p[F::NoseLength];
  const double nose_hw = 5.0 + 13.0 * p[F::NoseWidth];
  const double mouth_y = nose_bottom + 14.0 + 6.0 * p[F::ChinLength];
  const double mouth_hw = 12.0 + 22.0 * p[F::MouthWidth];
  const double lip_w = 1.5 + 6.0 * p[F::LipThickness];
  const double chin_y = kCenterY + head_ry + 4.0 + 18.0 * p[F::ChinLength];
  const double hair_h = 34.0 - 22.0 * p[F::SexCode];
  const double wrinkle_opacity = p[F::AgeCode];

  const auto& n = p.nuisance;
  const double hue = 360.0 * n(0);
  const double tilt = 30.0 * (n(1) - 0.5);
  const double brightness = 0.6 + 0.8 * n(2);
  const double shift = 24.0 * (n(3) - 0.5);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"256\" height=\"256\" "
       "viewBox=\"0 0 256 256\">\n"
    << "<defs><filter id=\"lighting\"><feComponentTransfer>"
    << "<feFuncR type=\"linear\" slope=\"" << num(brightness) << "\"/>"
    << "<feFuncG type=\"linear\" slope=\"" << num(brightness) << "\"/>"
    << "<feFuncB type=\"linear\" slope=\"" << num(brightness) << "\"/>"
    << "</feComponentTransfer></filter></defs>\n"
    << "<rect id=\"background\" x=\"0\" y=\"0\" width=\"256\" height=\"256\" fill=\"hsl("
    << num(hue) << ",40%,82%)\"/>\n"
    << "<g id=\"scene\" transform=\"translate(" << num(shift) << ",0) rotate(" << num(tilt) << " "
    << num(kCenterX) << " " << num(kCenterY) << ")\" filter=\"url(#lighting)\">\n"
    << "<g id=\"identity\">\n";
  // hair
  s << "<ellipse class=\"hair\" cx=\"" << num(kCenterX) << "\" cy=\"" << num(kCenterY - head_ry + 10.0)
    << "\" rx=\"" << num(head_rx + 6.0) << "\" ry=\"" << num(hair_h) << "\" fill=\"#4a3423\"/>\n";
  // head and chin
  s << "<ellipse class=\"head\" cx=\"" << num(kCenterX) << "\" cy=\"" << num(kCenterY) << "\" rx=\""
    << num(head_rx) << "\" ry=\"" << num(head_ry) << "\" fill=\"#e8c4a0\" stroke=\"#6b4a2f\"/>\n";
  s << "<path class=\"chin\" d=\"M " << num(kCenterX - 0.45 * head_rx) << " "
    << num(kCenterY + 0.8 * head_ry) << " Q " << num(kCenterX) << " " << num(chin_y) << " "
    << num(kCenterX + 0.45 * head_rx) << " " << num(kCenterY + 0.8 * head_ry)
    << "\" fill=\"none\" stroke=\"#6b4a2f\" stroke-width=\"2\"/>\n";
  // forehead lines
  for (int i = 0; i < 2; ++i) {
    const double y = brow_y - 12.0 - 6.0 * i;
    s << "<line class=\"wrinkle\" x1=\"" << num(kCenterX - 20.0) << "\" y1=\"" << num(y) << "\" x2=\""
      << num(kCenterX + 20.0) << "\" y2=\"" << num(y) << "\" stroke=\"#8a6a50\" stroke-opacity=\""
      << num(wrinkle_opacity) << "\"/>\n";
  }
  // eyes and brows
  for (int side = -1; side <= 1; side += 2) {
    const double ex = kCenterX + side * eye_dx;
    const char* label = side < 0 ? "left" : "right";
    s << "<circle class=\"eye-" << label << "\" cx=\"" << num(ex) << "\" cy=\"" << num(eye_y)
      << "\" r=\"" << num(eye_r) << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";
    s << "<circle class=\"pupil-" << label << "\" cx=\"" << num(ex) << "\" cy=\"" << num(eye_y)
      << "\" r=\"" << num(0.45 * eye_r) << "\" fill=\"#2b2b2b\"/>\n";
    const double inner = ex - side * 10.0;
    const double outer = ex + side * 10.0;
    s << "<line class=\"brow-" << label << "\" x1=\"" << num(inner) << "\" y1=\""
      << num(brow_y + brow_tilt) << "\" x2=\"" << num(outer) << "\" y2=\"" << num(brow_y - brow_tilt)
      << "\" stroke=\"#3b2a1c\" stroke-width=\"" << num(brow_w) << "\" stroke-linecap=\"round\"/>\n";
  }
  // nose
  s << "<path class=\"nose\" d=\"M " << num(kCenterX) << " " << num(nose_top) << " L "
    << num(kCenterX - nose_hw) << " " << num(nose_bottom) << " L " << num(kCenterX + nose_hw) << " "
    << num(nose_bottom) << " Z\" fill=\"#d9a982\" stroke=\"#6b4a2f\"/>\n";
  // mouth
  s << "<path class=\"mouth\" d=\"M " << num(kCenterX - mouth_hw) << " " << num(mouth_y) << " Q "
    << num(kCenterX) << " " << num(mouth_y + 8.0) << " " << num(kCenterX + mouth_hw) << " "
    << num(mouth_y) << "\" fill=\"none\" stroke=\"#a33b3b\" stroke-width=\"" << num(lip_w)
    << "\" stroke-linecap=\"round\"/>\n";
  s << "</g>\n</g>\n</svg>\n";
  return s.str();
}

FaceImage render(const FaceParams& params) {
  return FaceImage{render_svg(params), params, Latent()};
}

FaceImage generate(const Generator& generator, const Latent& latent) {
  FaceParams params = generator.decode_params(latent);
  return FaceImage{render_svg(params), params, latent};
}

}  // namespace mindface::face
