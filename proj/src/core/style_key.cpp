#include "spam/core/style_key.hpp"

#include "spam/core/error.hpp"

namespace spam {

std::size_t style_key_index(const StyleKey& key) {
  return ((static_cast<std::size_t>(key.gender) * 3 + static_cast<std::size_t>(key.pitch)) * 3 +
          static_cast<std::size_t>(key.speed)) *
             3 +
         static_cast<std::size_t>(key.energy);
}

StyleKey style_key_from_index(std::size_t index) {
  if (index >= kNumStyleKeys) throw UsageError("style key index out of range");
  StyleKey key;
  key.energy = static_cast<Level>(index % 3);
  index /= 3;
  key.speed = static_cast<Speed>(index % 3);
  index /= 3;
  key.pitch = static_cast<Level>(index % 3);
  index /= 3;
  key.gender = static_cast<Gender>(index);
  return key;
}

std::array<StyleKey, kNumStyleKeys> all_style_keys() {
  std::array<StyleKey, kNumStyleKeys> keys{};
  for (std::size_t i = 0; i < kNumStyleKeys; ++i) keys[i] = style_key_from_index(i);
  return keys;
}

int attribute_level(const StyleKey& key, Attribute attr) {
  switch (attr) {
    case Attribute::gender: return static_cast<int>(key.gender);
    case Attribute::pitch: return static_cast<int>(key.pitch);
    case Attribute::speed: return static_cast<int>(key.speed);
    case Attribute::energy: return static_cast<int>(key.energy);
  }
  return 0;
}

int attribute_cardinality(Attribute attr) { return attr == Attribute::gender ? 2 : 3; }

StyleKey with_attribute(StyleKey key, Attribute attr, int level) {
  if (level < 0 || level >= attribute_cardinality(attr)) {
    throw UsageError("attribute level out of range");
  }
  switch (attr) {
    case Attribute::gender: key.gender = static_cast<Gender>(level); break;
    case Attribute::pitch: key.pitch = static_cast<Level>(level); break;
    case Attribute::speed: key.speed = static_cast<Speed>(level); break;
    case Attribute::energy: key.energy = static_cast<Level>(level); break;
  }
  return key;
}

int attribute_distance(const StyleKey& a, const StyleKey& b) {
  int d = 0;
  for (Attribute attr : kAttributes) d += attribute_level(a, attr) != attribute_level(b, attr);
  return d;
}

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::string_view to_string(Level l) {
  switch (l) {
    case Level::low: return "low";
    case Level::normal: return "normal";
    case Level::high: return "high";
  }
  return "?";
}

std::string_view to_string(Speed s) {
  switch (s) {
    case Speed::slow: return "slow";
    case Speed::normal: return "normal";
    case Speed::fast: return "fast";
  }
  return "?";
}

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::gender: return "gender";
    case Attribute::pitch: return "pitch";
    case Attribute::speed: return "speed";
    case Attribute::energy: return "energy";
  }
  return "?";
}

Gender parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  throw DataError("unknown gender '" + std::string(s) + "'");
}

Level parse_level(std::string_view s) {
  if (s == "low") return Level::low;
  if (s == "normal") return Level::normal;
  if (s == "high") return Level::high;
  throw DataError("unknown level '" + std::string(s) + "'");
}

Speed parse_speed(std::string_view s) {
  if (s == "slow") return Speed::slow;
  if (s == "normal") return Speed::normal;
  if (s == "fast") return Speed::fast;
  throw DataError("unknown speed '" + std::string(s) + "'");
}

std::string describe(const StyleKey& key) {
  std::string out(to_string(key.gender));
  out += '/';
  out += to_string(key.pitch);
  out += '/';
  out += to_string(key.speed);
  out += '/';
  out += to_string(key.energy);
  return out;
}

}  // namespace spam
