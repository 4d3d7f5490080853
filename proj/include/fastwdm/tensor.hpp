#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fastwdm/errors.hpp"

namespace fastwdm {

// Spatial extent of a volume. Axis 2 is the fastest-varying in memory.
struct Shape3 {
  std::size_t d0 = 0;
  std::size_t d1 = 0;
  std::size_t d2 = 0;

  constexpr std::size_t count() const { return d0 * d1 * d2; }
  constexpr bool all_even() const { return d0 % 2 == 0 && d1 % 2 == 0 && d2 % 2 == 0; }
  constexpr Shape3 halved() const { return {d0 / 2, d1 / 2, d2 / 2}; }
  constexpr Shape3 doubled() const { return {d0 * 2, d1 * 2, d2 * 2}; }
  constexpr std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * d1 + j) * d2 + k;
  }
  friend constexpr bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& s);

// A stack of equally shaped 3D channels stored channel-major.
template <class Real>
class ChannelTensor {
 public:
  ChannelTensor() = default;
  ChannelTensor(std::size_t channels, Shape3 shape)
      : channels_(channels), shape_(shape), data_(channels * shape.count(), Real{0}) {}

  std::size_t channels() const { return channels_; }
  const Shape3& shape() const { return shape_; }
  std::size_t channel_size() const { return shape_.count(); }

  std::span<Real> channel(std::size_t c) {
    return std::span<Real>(data_).subspan(c * shape_.count(), shape_.count());
  }
  std::span<const Real> channel(std::size_t c) const {
    return std::span<const Real>(data_).subspan(c * shape_.count(), shape_.count());
  }

  std::vector<Real>& data() { return data_; }
  const std::vector<Real>& data() const { return data_; }

  // Copies channels [0, src.channels()) of src into this tensor starting at dst_channel.
  template <class Other>
  void assign_channels(std::size_t dst_channel, const ChannelTensor<Other>& src) {
    if (src.shape() != shape_ || dst_channel + src.channels() > channels_) {
      throw ShapeError("channel block does not fit tensor");
    }
    const auto& s = src.data();
    auto* dst = data_.data() + dst_channel * shape_.count();
    for (std::size_t i = 0; i < s.size(); ++i) dst[i] = static_cast<Real>(s[i]);
  }

  template <class Other>
  ChannelTensor<Other> cast() const {
    ChannelTensor<Other> out(channels_, shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<Other>(data_[i]);
    return out;
  }

 private:
  std::size_t channels_ = 0;
  Shape3 shape_{};
  std::vector<Real> data_;
};

}  // namespace fastwdm
