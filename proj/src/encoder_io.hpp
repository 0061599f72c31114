#pragma once

// Encoder header/payload pieces reused by the MoCo checkpoint.

#include "binary_io.hpp"
#include "mixco/encoder.hpp"

namespace mixco::detail {

void write_encoder_header(io::ByteWriter& w, const EncoderParams& params);
void write_encoder_payload(io::ByteWriter& w, const EncoderParams& params);
EncoderParams read_encoder_header(io::ByteReader& r);
void read_encoder_payload(io::ByteReader& r, EncoderParams& params);

}  // namespace mixco::detail
