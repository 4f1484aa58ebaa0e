#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dataset_io_detail.hpp"
#include "sempaste/errors.hpp"

namespace fs = std::filesystem;

namespace sempaste {

namespace {

std::string xml_unescape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      auto end = s.find(';', i);
      if (end != std::string::npos) {
        std::string ent = s.substr(i + 1, end - i - 1);
        i = end + 1;
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else out += '&' + ent + ';';
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct XmlCursor {
  const std::string& src;
  std::size_t pos = 0;

  void skip_misc() {
    while (pos < src.size()) {
      if (src.compare(pos, 4, "<!--") == 0) {
        auto end = src.find("-->", pos);
        if (end == std::string::npos)
          throw DataError("xml: unterminated comment");
        pos = end + 3;
      } else if (src.compare(pos, 2, "<?") == 0) {
        auto end = src.find("?>", pos);
        if (end == std::string::npos)
          throw DataError("xml: unterminated declaration");
        pos = end + 2;
      } else if (std::isspace(static_cast<unsigned char>(src[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  XmlNode parse_element() {
    if (pos >= src.size() || src[pos] != '<')
      throw DataError("xml: expected element");
    ++pos;
    XmlNode node;
    while (pos < src.size() && src[pos] != '>' && src[pos] != '/' &&
           !std::isspace(static_cast<unsigned char>(src[pos])))
      node.tag += src[pos++];
    if (node.tag.empty()) throw DataError("xml: empty tag name");
    // attributes are tolerated and ignored
    while (pos < src.size() && src[pos] != '>' &&
           !(src[pos] == '/' && pos + 1 < src.size() && src[pos + 1] == '>'))
      ++pos;
    if (pos < src.size() && src[pos] == '/') {
      pos += 2;  // "/>"
      return node;
    }
    if (pos >= src.size()) throw DataError("xml: unterminated tag");
    ++pos;  // '>'

    std::string text;
    while (true) {
      if (pos >= src.size())
        throw DataError("xml: missing close tag for <" + node.tag + ">");
      if (src[pos] == '<') {
        if (src.compare(pos, 4, "<!--") == 0) {
          auto end = src.find("-->", pos);
          if (end == std::string::npos)
            throw DataError("xml: unterminated comment");
          pos = end + 3;
        } else if (src.compare(pos, 2, "</") == 0) {
          auto end = src.find('>', pos);
          if (end == std::string::npos)
            throw DataError("xml: unterminated close tag");
          std::string closing = trim(src.substr(pos + 2, end - pos - 2));
          if (closing != node.tag)
            throw DataError("xml: mismatched </" + closing + "> inside <" +
                            node.tag + ">");
          pos = end + 1;
          break;
        } else {
          node.children.push_back(parse_element());
        }
      } else {
        text += src[pos++];
      }
    }
    node.text = xml_unescape(trim(text));
    return node;
  }
};

int parse_int_field(const XmlNode& node, const std::string& name,
                    const std::string& context) {
  const XmlNode* c = node.child(name);
  if (!c) throw DataError(context + ": missing <" + name + ">");
  try {
    return std::stoi(c->text);
  } catch (...) {
    throw DataError(context + ": non-numeric <" + name + ">: " + c->text);
  }
}

const std::set<std::string> kVocKnownObjectTags = {
    "name", "bndbox", "synthetic"};

}  // namespace

const XmlNode* XmlNode::child(const std::string& name) const {
  for (const auto& c : children)
    if (c.tag == name) return &c;
  return nullptr;
}

std::string XmlNode::child_text(const std::string& name,
                                const std::string& fallback) const {
  const XmlNode* c = child(name);
  return c ? c->text : fallback;
}

XmlNode parse_xml(const std::string& content) {
  XmlCursor cur{content};
  cur.skip_misc();
  XmlNode root = cur.parse_element();
  return root;
}

namespace detail {

DatasetIndex read_voc_index(const DatasetManifest& manifest) {
  if (!fs::is_directory(manifest.annotation_source))
    throw IoError("voc annotation directory not found: " +
                  manifest.annotation_source);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(manifest.annotation_source))
    if (e.path().extension() == ".xml") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  DatasetIndex index;
  std::set<std::string> seen_categories;

  for (const auto& path : files) {
    std::string stem = path.stem().string();
    std::ifstream in(path);
    if (!in) {
      index.errors.push_back({path.string(), "cannot open"});
      continue;
    }
    std::stringstream ss;
    ss << in.rdbuf();

    XmlNode root;
    try {
      root = parse_xml(ss.str());
    } catch (const std::exception& e) {
      index.errors.push_back({path.string(), e.what()});
      continue;
    }

    AnnotatedImage img;
    img.id = stem;
    img.file_name = root.child_text("filename", stem + ".jpg");
    const XmlNode* size = root.child("size");
    if (!size) {
      index.errors.push_back({path.string(), "missing <size>"});
      continue;
    }
    try {
      img.width = parse_int_field(*size, "width", stem);
      img.height = parse_int_field(*size, "height", stem);
    } catch (const std::exception& e) {
      index.errors.push_back({path.string(), e.what()});
      continue;
    }

    for (const auto& node : root.children) {
      if (node.tag != "object") continue;
      ObjectAnnotation obj;
      obj.category = node.child_text("name");
      if (obj.category.empty()) {
        index.errors.push_back({"image " + stem, "object without <name>"});
        continue;
      }
      const XmlNode* bnd = node.child("bndbox");
      if (!bnd) {
        index.errors.push_back({"image " + stem, "object without <bndbox>"});
        continue;
      }
      try {
        // 1-based inclusive corners -> 0-based (x, y, w, h)
        int xmin = parse_int_field(*bnd, "xmin", stem);
        int ymin = parse_int_field(*bnd, "ymin", stem);
        int xmax = parse_int_field(*bnd, "xmax", stem);
        int ymax = parse_int_field(*bnd, "ymax", stem);
        obj.bbox = Box{static_cast<double>(xmin - 1),
                       static_cast<double>(ymin - 1),
                       static_cast<double>(xmax - xmin + 1),
                       static_cast<double>(ymax - ymin + 1)};
      } catch (const std::exception& e) {
        index.errors.push_back({"image " + stem, e.what()});
        continue;
      }
      if (auto why = bbox_violation(obj.bbox, img.width, img.height)) {
        index.errors.push_back({"image " + stem, *why});
        continue;
      }
      obj.synthetic = node.child_text("synthetic") == "1" ||
                      node.child_text("synthetic") == "true";
      Json extra = Json::object();
      for (const auto& c : node.children)
        if (!kVocKnownObjectTags.count(c.tag) && c.children.empty())
          extra[c.tag] = c.text;
      obj.extra = std::move(extra);
      seen_categories.insert(obj.category);
      img.objects.push_back(std::move(obj));
    }
    index.images.push_back(std::move(img));
  }

  // alphabetical category order, ids 1-based (matches the class-index
  // convention of segmentation label images)
  index.categories.assign(seen_categories.begin(), seen_categories.end());
  for (std::size_t i = 0; i < index.categories.size(); ++i)
    index.category_ids[index.categories[i]] = static_cast<int>(i) + 1;
  return index;
}

void write_voc_annotations(const DatasetIndex& index,
                           const std::map<std::string, FinalImage>& finals,
                           const std::string& out_root) {
  fs::path dir = fs::path(out_root) / "Annotations";
  fs::create_directories(dir);

  for (const auto& img : index.images) {
    auto fin = finals.find(img.id);
    if (fin == finals.end()) continue;

    std::ostringstream xml;
    xml << "<annotation>\n";
    xml << "  <folder>JPEGImages</folder>\n";
    xml << "  <filename>" << xml_escape(fin->second.file_name)
        << "</filename>\n";
    xml << "  <size>\n";
    xml << "    <width>" << img.width << "</width>\n";
    xml << "    <height>" << img.height << "</height>\n";
    xml << "    <depth>3</depth>\n";
    xml << "  </size>\n";

    for (const auto& obj : fin->second.objects) {
      xml << "  <object>\n";
      xml << "    <name>" << xml_escape(obj.category) << "</name>\n";
      if (!obj.extra.is_null())
        for (const auto& [k, v] : obj.extra.items())
          xml << "    <" << k << ">" << xml_escape(v.get<std::string>())
              << "</" << k << ">\n";
      if (obj.synthetic) xml << "    <synthetic>1</synthetic>\n";
      long long xmin = std::llround(obj.bbox.x) + 1;
      long long ymin = std::llround(obj.bbox.y) + 1;
      long long xmax = std::llround(obj.bbox.x + obj.bbox.w);
      long long ymax = std::llround(obj.bbox.y + obj.bbox.h);
      xml << "    <bndbox>\n";
      xml << "      <xmin>" << xmin << "</xmin>\n";
      xml << "      <ymin>" << ymin << "</ymin>\n";
      xml << "      <xmax>" << xmax << "</xmax>\n";
      xml << "      <ymax>" << ymax << "</ymax>\n";
      xml << "    </bndbox>\n";
      xml << "  </object>\n";
    }
    xml << "</annotation>\n";

    fs::path path = dir / (img.id + ".xml");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << xml.str();
    if (!out) throw IoError("write failed: " + path.string());
  }
}

}  // namespace detail

}  // namespace sempaste
