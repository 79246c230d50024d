// Copyright 2026 The selfmix-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "selfmix/data.hpp"
#include "selfmix/error.hpp"

namespace selfmix {

namespace {

std::size_t parse_label(const std::string& field, std::size_t line, const char* column) {
  std::size_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(std::string("invalid ") + column + " '" + field + "'", line);
  }
  return value;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv_records(const std::string& content,
                                                        std::vector<std::size_t>* record_lines) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    if (record_lines) record_lines->push_back(record_line);
    field_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char ch = content[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) throw ParseError("quote inside unquoted field", line);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !record.empty()) end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (!field_started && field.empty() && record.empty()) record_line = line;
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", record_line);
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

Dataset parse_csv_dataset(const std::string& content, std::string name,
                          std::optional<std::size_t> num_classes) {
  std::vector<std::size_t> lines;
  const auto records = parse_csv_records(content, &lines);
  if (records.empty()) throw FormatError("missing header line");

  const auto& header = records.front();
  bool with_oracle = false;
  if (header == std::vector<std::string>{"label", "text"}) {
    with_oracle = false;
  } else if (header == std::vector<std::string>{"label", "text", "true_label"}) {
    with_oracle = true;
  } else {
    std::string got;
    for (std::size_t i = 0; i < header.size(); ++i) got += (i ? "," : "") + header[i];
    throw FormatError("unknown header '" + got + "', expected 'label,text[,true_label]'");
  }
  const std::size_t width = with_oracle ? 3 : 2;

  std::vector<Example> examples;
  examples.reserve(records.size() - 1);
  std::size_t max_label = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t line = lines[r];
    if (rec.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, got " +
                           std::to_string(rec.size()),
                       line);
    }
    Example e;
    e.id = examples.size();
    e.observed_label = parse_label(rec[0], line, "label");
    e.text = rec[1];
    if (with_oracle) {
      e.true_label = parse_label(rec[2], line, "true_label");
      e.corrupted = *e.true_label != e.observed_label;
    }
    if (num_classes) {
      if (e.observed_label >= *num_classes || (e.true_label && *e.true_label >= *num_classes)) {
        throw ParseError("label out of range for " + std::to_string(*num_classes) + " classes",
                         line);
      }
    }
    max_label = std::max({max_label, e.observed_label, e.true_label.value_or(0)});
    examples.push_back(std::move(e));
  }
  const std::size_t classes = num_classes.value_or(examples.empty() ? 0 : max_label + 1);
  return Dataset(std::move(name), classes, std::move(examples));
}

Dataset read_csv_dataset(const std::string& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), path, num_classes);
}

std::string format_csv_dataset(const Dataset& dataset) {
  const bool with_oracle = dataset.has_oracle();
  std::string out = with_oracle ? "label,text,true_label\n" : "label,text\n";
  for (const auto& e : dataset.examples()) {
    out += std::to_string(e.observed_label);
    out += ',';
    out += csv_quote(e.text);
    if (with_oracle) {
      out += ',';
      out += std::to_string(*e.true_label);
    }
    out += '\n';
  }
  return out;
}

void write_csv_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << format_csv_dataset(dataset);
}

}  // namespace selfmix
