#include "assertctl/types.hpp"

#include "assertctl/error.hpp"
#include "assertctl/text.hpp"

namespace assertctl {

AnnotatedInstance make_instance(std::string id, std::string text, std::size_t start, std::size_t end,
                                std::optional<AssertionLabel> gold, std::string dataset) {
  const std::size_t length = text::utf8_length(text);
  if (!(start < end && end <= length)) {
    throw Error(ErrorKind::SpanOutOfBounds, "instance '" + id + "': span [" + std::to_string(start) +
                                                "," + std::to_string(end) + ") outside text of length " +
                                                std::to_string(length));
  }
  const std::size_t b0 = text::utf8_byte_offset(text, start);
  const std::size_t b1 = text::utf8_byte_offset(text, end);
  AnnotatedInstance instance;
  instance.span = ConceptSpan{start, end, text.substr(b0, b1 - b0)};
  instance.id = std::move(id);
  instance.text = std::move(text);
  instance.gold = gold;
  instance.dataset = std::move(dataset);
  return instance;
}

std::pair<std::size_t, std::size_t> concept_byte_range(const AnnotatedInstance& instance) {
  return {text::utf8_byte_offset(instance.text, instance.span.start),
          text::utf8_byte_offset(instance.text, instance.span.end)};
}

}  // namespace assertctl
