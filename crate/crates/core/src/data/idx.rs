//! MNIST IDX reader/writer (big-endian headers, optional gzip).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Dataset, Shape, Split};
use crate::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(buf: &[u8], offset: usize, path: &Path) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: (offset + 4) as u64,
            found: buf.len() as u64,
        })
}

fn check_len(buf: &[u8], expected: usize, path: &Path) -> Result<()> {
    match buf.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected as u64,
            found: buf.len() as u64,
        }),
        std::cmp::Ordering::Greater => Err(Error::TrailingBytes {
            path: path.to_path_buf(),
            extra: (buf.len() - expected) as u64,
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Load an IDX image/label file pair (MNIST, Fashion-MNIST).
///
/// The returned dataset is named `mnist` and marked as the train split;
/// use [`Dataset::with_name`] / [`Dataset::with_split`] to relabel it.
pub fn load_mnist_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<Dataset> {
    let image_path = image_path.as_ref();
    let label_path = label_path.as_ref();

    let img = read_maybe_gz(image_path)?;
    let magic = be_u32(&img, 0, image_path)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::BadMagic {
            path: image_path.to_path_buf(),
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let n_images = be_u32(&img, 4, image_path)? as usize;
    let rows = be_u32(&img, 8, image_path)? as usize;
    let cols = be_u32(&img, 12, image_path)? as usize;
    check_len(&img, 16 + n_images * rows * cols, image_path)?;

    let lbl = read_maybe_gz(label_path)?;
    let magic = be_u32(&lbl, 0, label_path)?;
    if magic != LABEL_MAGIC {
        return Err(Error::BadMagic {
            path: label_path.to_path_buf(),
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let n_labels = be_u32(&lbl, 4, label_path)? as usize;
    check_len(&lbl, 8 + n_labels, label_path)?;

    if n_images != n_labels {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let labels = lbl[8..].iter().map(|&b| b as usize).collect();
    Dataset::new(
        "mnist",
        Split::Train,
        Shape::new(rows, cols, 1),
        MNIST_CLASSES,
        img[16..].to_vec(),
        labels,
    )
}

fn write_maybe_gz(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path.extension().is_some_and(|e| e == "gz");
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let res = if gz {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes).and_then(|_| enc.finish().map(|_| ()))
    } else {
        let mut file = file;
        file.write_all(bytes)
    };
    res.map_err(|e| Error::io(path, e))
}

/// Write a single-channel dataset as an IDX pair. Paths ending in `.gz` are
/// gzip-compressed.
pub fn write_mnist_idx(ds: &Dataset, image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<()> {
    let shape = ds.shape();
    if shape.channels != 1 {
        return Err(Error::InvalidArgument(format!(
            "IDX images must be single-channel, got {} channels",
            shape.channels
        )));
    }
    if ds.labels().iter().any(|&l| l > u8::MAX as usize) {
        return Err(Error::InvalidArgument("IDX labels must fit in a byte".into()));
    }
    let mut img = Vec::with_capacity(16 + ds.images().len());
    for v in [IMAGE_MAGIC, ds.len() as u32, shape.height as u32, shape.width as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(ds.images());
    write_maybe_gz(image_path.as_ref(), &img)?;

    let mut lbl = Vec::with_capacity(8 + ds.len());
    lbl.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    lbl.extend(ds.labels().iter().map(|&l| l as u8));
    write_maybe_gz(label_path.as_ref(), &lbl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out
    }

    fn write_pair(dir: &Path, n: u32, n_labels: u32, img_magic: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut img = header(img_magic, &[n, 2, 2]);
        img.extend((0..n * 4).map(|i| i as u8));
        let mut lbl = header(LABEL_MAGIC, &[n_labels]);
        lbl.extend((0..n_labels).map(|i| (i % 10) as u8));
        let ip = dir.join("img");
        let lp = dir.join("lbl");
        fs::write(&ip, img).unwrap();
        fs::write(&lp, lbl).unwrap();
        (ip, lp)
    }

    #[test]
    fn loads_small_pair() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 3, 3, IMAGE_MAGIC);
        let ds = load_mnist_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.num_classes(), 10);
        assert_eq!(ds.image(1), &[4, 5, 6, 7]);
        assert_eq!(ds.labels(), &[0, 1, 2]);
    }

    #[test]
    fn label_magic_in_image_file_is_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 3, 3, LABEL_MAGIC);
        assert!(matches!(
            load_mnist_idx(&ip, &lp),
            Err(Error::BadMagic { found: LABEL_MAGIC, .. })
        ));
    }

    #[test]
    fn truncated_and_mismatched_files_have_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 3, 2, IMAGE_MAGIC);
        assert!(matches!(
            load_mnist_idx(&ip, &lp),
            Err(Error::CountMismatch { images: 3, labels: 2 })
        ));

        let (ip, lp) = write_pair(dir.path(), 3, 3, IMAGE_MAGIC);
        let mut bytes = fs::read(&ip).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&ip, bytes).unwrap();
        assert!(matches!(load_mnist_idx(&ip, &lp), Err(Error::Truncated { .. })));

        fs::write(&ip, [0u8, 0]).unwrap();
        assert!(matches!(load_mnist_idx(&ip, &lp), Err(Error::Truncated { .. })));
    }

    #[test]
    fn gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 5, 5, IMAGE_MAGIC);
        let ds = load_mnist_idx(&ip, &lp).unwrap();
        let gi = dir.path().join("i.gz");
        let gl = dir.path().join("l.gz");
        write_mnist_idx(&ds, &gi, &gl).unwrap();
        assert_eq!(&fs::read(&gi).unwrap()[..2], &[0x1f, 0x8b]);
        assert_eq!(load_mnist_idx(&gi, &gl).unwrap(), ds);
    }
}
