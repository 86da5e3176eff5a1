//! PASCAL-VOC-style XML annotations.
//!
//! The on-disk convention is the VOC one: `<bndbox>` coordinates are
//! 1-based and inclusive. Internally boxes are 0-based half-open, so the
//! writer emits `xmin = min_x + 1 .. xmax = max_x` and the reader inverts
//! that. Objects are written in `(min_y, min_x)` order and the element
//! layout is fixed, so identical records serialize to identical bytes.
//!
//! Extension elements `<view>`, `<id>`, `<origin>` and `<area>` keep the
//! round trip lossless; readers that only understand stock VOC ignore
//! them, and unknown elements in incoming documents are ignored here.

use super::{AnnotatedImage, AnnotationError, ClusterInstance, InstanceSource, View};
use crate::geometry::BBox;
use quick_xml::events::Event;
use quick_xml::Reader;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

const CLASS_NAME: &str = "aphid_cluster";

fn escape_xml(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes one image record to a VOC XML document.
pub fn write_voc_xml(image: &AnnotatedImage) -> String {
    let mut objects: Vec<&ClusterInstance> = image.instances.iter().collect();
    objects.sort_by_key(|inst| (inst.bbox.min_y(), inst.bbox.min_x(), inst.bbox, inst.id));

    let mut doc = String::new();
    doc.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    doc.push_str("<annotation>\n");
    let _ = writeln!(doc, "    <filename>{}</filename>", escape_xml(&image.id));
    let _ = writeln!(doc, "    <view>{}</view>", image.view);
    doc.push_str("    <size>\n");
    let _ = writeln!(doc, "        <width>{}</width>", image.width);
    let _ = writeln!(doc, "        <height>{}</height>", image.height);
    doc.push_str("        <depth>3</depth>\n");
    doc.push_str("    </size>\n");
    for inst in objects {
        doc.push_str("    <object>\n");
        let _ = writeln!(doc, "        <name>{CLASS_NAME}</name>");
        let _ = writeln!(doc, "        <id>{}</id>", inst.id);
        let _ = writeln!(doc, "        <origin>{}</origin>", inst.source.as_str());
        if let Some(area) = inst.area {
            let _ = writeln!(doc, "        <area>{area}</area>");
        }
        doc.push_str("        <difficult>0</difficult>\n");
        doc.push_str("        <bndbox>\n");
        let _ = writeln!(doc, "            <xmin>{}</xmin>", inst.bbox.min_x() + 1);
        let _ = writeln!(doc, "            <ymin>{}</ymin>", inst.bbox.min_y() + 1);
        let _ = writeln!(doc, "            <xmax>{}</xmax>", inst.bbox.max_x());
        let _ = writeln!(doc, "            <ymax>{}</ymax>", inst.bbox.max_y());
        doc.push_str("        </bndbox>\n");
        doc.push_str("    </object>\n");
    }
    doc.push_str("</annotation>\n");
    doc
}

#[derive(Default)]
struct RawObject {
    id: Option<u32>,
    origin: Option<InstanceSource>,
    area: Option<u64>,
    xmin: Option<u32>,
    ymin: Option<u32>,
    xmax: Option<u32>,
    ymax: Option<u32>,
}

fn parse_number<T: FromStr>(element: &str, value: &str) -> Result<T, AnnotationError> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| AnnotationError::InvalidNumber {
            element: element.to_string(),
            value: value.to_string(),
        })
}

/// Parses a VOC XML document back into an [`AnnotatedImage`].
///
/// Inverse of [`write_voc_xml`]; unknown elements are skipped. A missing
/// `<view>` defaults to `view1` so stock VOC files can be imported.
pub fn read_voc_xml(doc: &str) -> Result<AnnotatedImage, AnnotationError> {
    let mut reader = Reader::from_str(doc);

    let mut path: Vec<String> = Vec::new();
    let mut text = String::new();

    let mut id: Option<String> = None;
    let mut view: Option<View> = None;
    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut objects: Vec<RawObject> = Vec::new();
    let mut current: Option<RawObject> = None;

    loop {
        match reader.read_event() {
            Err(e) => return Err(AnnotationError::Xml(e.to_string())),
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if name == "object" && path == ["annotation"] {
                    current = Some(RawObject::default());
                }
                path.push(name);
                text.clear();
            }
            Ok(Event::Text(t)) => {
                let piece = t
                    .decode()
                    .map_err(|e| AnnotationError::Xml(e.to_string()))?;
                text.push_str(&piece);
            }
            Ok(Event::GeneralRef(entity)) => {
                let resolved = entity
                    .resolve_char_ref()
                    .map_err(|e| AnnotationError::Xml(e.to_string()))?;
                match resolved {
                    Some(ch) => text.push(ch),
                    None => {
                        let name = entity
                            .decode()
                            .map_err(|e| AnnotationError::Xml(e.to_string()))?;
                        match name.as_ref() {
                            "lt" => text.push('<'),
                            "gt" => text.push('>'),
                            "amp" => text.push('&'),
                            "apos" => text.push('\''),
                            "quot" => text.push('"'),
                            other => {
                                return Err(AnnotationError::Xml(format!(
                                    "unknown entity &{other};"
                                )))
                            }
                        }
                    }
                }
            }
            Ok(Event::End(_)) => {
                let leaf = path.pop().unwrap_or_default();
                let parent = path.last().map(String::as_str).unwrap_or("");
                let value = text.trim().to_string();
                text.clear();
                match (parent, leaf.as_str()) {
                    ("annotation", "filename") => id = Some(value),
                    ("annotation", "view") => view = Some(value.parse()?),
                    ("size", "width") => width = Some(parse_number("width", &value)?),
                    ("size", "height") => height = Some(parse_number("height", &value)?),
                    ("annotation", "object") => {
                        if let Some(obj) = current.take() {
                            objects.push(obj);
                        }
                    }
                    ("object", "id") => {
                        if let Some(obj) = current.as_mut() {
                            obj.id = Some(parse_number("id", &value)?);
                        }
                    }
                    ("object", "origin") => {
                        if let Some(obj) = current.as_mut() {
                            // Foreign origin values fall back to "labeled".
                            obj.origin = value.parse().ok();
                        }
                    }
                    ("object", "area") => {
                        if let Some(obj) = current.as_mut() {
                            obj.area = Some(parse_number("area", &value)?);
                        }
                    }
                    ("bndbox", coord @ ("xmin" | "ymin" | "xmax" | "ymax")) => {
                        if let Some(obj) = current.as_mut() {
                            let n: u32 = parse_number(coord, &value)?;
                            match coord {
                                "xmin" => obj.xmin = Some(n),
                                "ymin" => obj.ymin = Some(n),
                                "xmax" => obj.xmax = Some(n),
                                _ => obj.ymax = Some(n),
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ok(_) => {}
        }
    }

    let id = id.ok_or(AnnotationError::MissingElement("filename"))?;
    let width = width.ok_or(AnnotationError::MissingElement("size"))?;
    let height = height.ok_or(AnnotationError::MissingElement("size"))?;

    let mut instances = Vec::with_capacity(objects.len());
    for (index, obj) in objects.into_iter().enumerate() {
        let invalid = |reason: String| AnnotationError::InvalidObject { index, reason };
        let take = |field: Option<u32>, name: &str| {
            field.ok_or_else(|| AnnotationError::InvalidObject {
                index,
                reason: format!("missing <{name}>"),
            })
        };
        let xmin = take(obj.xmin, "xmin")?;
        let ymin = take(obj.ymin, "ymin")?;
        let xmax = take(obj.xmax, "xmax")?;
        let ymax = take(obj.ymax, "ymax")?;
        if xmin == 0 || ymin == 0 {
            return Err(invalid("coordinates are 1-based; found 0".to_string()));
        }
        if xmax < xmin || ymax < ymin {
            return Err(invalid(format!(
                "inverted box {xmin},{ymin},{xmax},{ymax}"
            )));
        }
        if xmax > width || ymax > height {
            return Err(invalid(format!(
                "box {xmin},{ymin},{xmax},{ymax} exceeds image {width}x{height}"
            )));
        }
        let bbox = BBox::new(xmin - 1, ymin - 1, xmax, ymax)
            .expect("validated VOC coordinates form a positive box");
        instances.push(ClusterInstance {
            id: obj.id.unwrap_or(index as u32 + 1),
            bbox,
            area: obj.area,
            source: obj.origin.unwrap_or(InstanceSource::Labeled),
        });
    }

    Ok(AnnotatedImage {
        id,
        width,
        height,
        view: view.unwrap_or(View::View1),
        instances,
    })
}

/// Writes a record to `path` as VOC XML.
pub fn write_voc_file(image: &AnnotatedImage, path: &Path) -> Result<(), AnnotationError> {
    std::fs::write(path, write_voc_xml(image)).map_err(|source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a VOC XML file.
pub fn read_voc_file(path: &Path) -> Result<AnnotatedImage, AnnotationError> {
    let doc = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_voc_xml(&doc)
}
