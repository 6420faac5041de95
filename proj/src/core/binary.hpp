#pragma once

#include <cstdint>
#include <cstring>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "core/error.hpp"
#include "core/types.hpp"

namespace dgrag {

// Little-endian writer. Strings are u32 length + bytes; float vectors are
// u32 count + IEEE-754 binary32 values.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void I32(std::int32_t v) { U32(static_cast<std::uint32_t>(v)); }
  void F32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    U32(bits);
  }
  void F64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    U64(bits);
  }
  void Bool(bool v) { U8(v ? 1 : 0); }
  void Str(std::string_view s) {
    U32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void Vec(const Embedding& v) {
    U32(static_cast<std::uint32_t>(v.size()));
    for (float f : v) F32(f);
  }
  void StrList(const std::vector<std::string>& v) {
    U32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) Str(s);
  }
  void StrSet(const std::set<std::string>& v) {
    U32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) Str(s);
  }
  void Raw(std::string_view s) { buf_.append(s); }

  const std::string& bytes() const { return buf_; }
  std::string Take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t U8() { return static_cast<std::uint8_t>(Need(1)[0]); }
  std::uint32_t U32() {
    const char* p = Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    const char* p = Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    return v;
  }
  std::int32_t I32() { return static_cast<std::int32_t>(U32()); }
  float F32() {
    std::uint32_t bits = U32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  double F64() {
    std::uint64_t bits = U64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  bool Bool() {
    std::uint8_t v = U8();
    if (v > 1) throw Error(ErrorCode::kDecode, "invalid boolean byte");
    return v == 1;
  }
  std::string Str() {
    std::uint32_t n = U32();
    return std::string(Need(n), n);
  }
  Embedding Vec() {
    std::uint32_t n = U32();
    if (static_cast<std::uint64_t>(n) * 4 > remaining()) throw Error(ErrorCode::kDecode, "truncated vector");
    Embedding v(n);
    for (auto& f : v) f = F32();
    return v;
  }
  std::vector<std::string> StrList() {
    std::uint32_t n = Count();
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(Str());
    return v;
  }
  std::set<std::string> StrSet() {
    std::uint32_t n = Count();
    std::set<std::string> v;
    for (std::uint32_t i = 0; i < n; ++i) v.insert(Str());
    return v;
  }
  // Element count guarded against absurd values from corrupt input (every
  // element occupies at least 4 bytes).
  std::uint32_t Count() {
    std::uint32_t n = U32();
    if (static_cast<std::uint64_t>(n) * 4 > remaining()) throw Error(ErrorCode::kDecode, "element count exceeds input");
    return n;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  const char* Need(std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::kDecode, "truncated input");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

void WriteChunk(ByteWriter& w, const Chunk& c);
Chunk ReadChunk(ByteReader& r);
void WriteEntity(ByteWriter& w, const Entity& e);
Entity ReadEntity(ByteReader& r);
void WriteRelation(ByteWriter& w, const Relation& rel);
Relation ReadRelation(ByteReader& r);
void WriteSummary(ByteWriter& w, const SubgraphSummary& s);
SubgraphSummary ReadSummary(ByteReader& r);
void WriteBundle(ByteWriter& w, const KnowledgeBundle& b);
KnowledgeBundle ReadBundle(ByteReader& r);

std::uint32_t Crc32(std::string_view data);

}  // namespace dgrag
