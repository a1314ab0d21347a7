#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/pixels.hpp"

namespace mammo {
namespace dicom {

struct Tag {
    std::uint16_t group = 0;
    std::uint16_t element = 0;

    auto operator<=>(const Tag&) const = default;
    std::string str() const;  // "(gggg,eeee)"
};

// Tags this pipeline interprets.
inline constexpr Tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr Tag kPhotometricInterpretation{0x0028, 0x0004};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kBitsStored{0x0028, 0x0101};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};

// Transfer syntaxes supported natively. JPEG2000 family is extraction-only:
// the codestream is handed to an external decoder.
inline constexpr const char* kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";
inline constexpr const char* kImplicitVrLittleEndian = "1.2.840.10008.1.2";
inline constexpr const char* kJpeg2000Lossless = "1.2.840.10008.1.2.4.90";
inline constexpr const char* kJpeg2000 = "1.2.840.10008.1.2.4.91";

enum class PayloadKind { Native, Encapsulated };

struct DicomObject {
    std::string transfer_syntax_uid;
    Photometric photometric_interpretation = Photometric::Monochrome2;
    std::size_t rows = 0;
    std::size_t columns = 0;
    int bits_allocated = 8;
    int bits_stored = 8;
    // Native: raw little-endian pixel bytes. Encapsulated: the undecoded
    // item stream (offset table, fragments, sequence delimiter).
    std::vector<std::uint8_t> pixel_payload;
    PayloadKind payload_kind = PayloadKind::Native;
    // Raw values of every parsed element except PixelData, by tag.
    // Values are byte-exact as found in the file.
    std::map<Tag, std::vector<std::uint8_t>> extra_tags;
};

// Parses a DICOM part-10 file: 128-byte preamble, "DICM", explicit-VR
// little-endian meta header, then a dataset in one of the supported
// transfer syntaxes. Never reads past the end of `bytes`.
DicomObject parse_dicom(std::span<const std::uint8_t> bytes);

// Native: returns the payload as-is. Encapsulated: concatenated fragment
// bytes of the first frame, with the basic offset table item skipped.
std::vector<std::uint8_t> extract_pixel_payload(const DicomObject& obj);

// Decodes a Native payload into a pixel grid; values are read little-endian
// and masked to bits_stored.
PixelMatrix decode_native_pixels(const DicomObject& obj);

bool is_jpeg2000(const std::string& transfer_syntax_uid);

// DICOM pads string values to even length; comparisons strip the padding.
std::string trim_padding(std::string value);

} // namespace dicom
} // namespace mammo
