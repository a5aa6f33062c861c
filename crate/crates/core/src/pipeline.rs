//! Edge detection, voting and line extraction as separately callable
//! phases, with a cost tally per phase.

use std::path::Path;

use crate::backend::ConvBackend;
use crate::canny::{Canny, EdgeMap};
use crate::config::Settings;
use crate::cost::Tally;
use crate::hough::{accumulate_counted, find_lines_counted, lines_from_peaks, DetectedLine, HoughAccumulator, HoughParams, LineSegment};
use crate::imaging::{render_overlay, save_pgm, GrayImage};
use crate::Error;

/// Per-phase cost tallies of one detection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTallies {
    pub canny: Tally,
    pub hough: Tally,
    pub coordinates: Tally,
}

impl PhaseTallies {
    pub fn total(&self) -> Tally {
        let mut t = self.canny;
        t.add(&self.hough);
        t.add(&self.coordinates);
        t
    }
}

#[derive(Clone, Debug)]
pub struct Detection {
    pub edges: EdgeMap,
    pub lines: Vec<DetectedLine>,
    pub tallies: PhaseTallies,
}

impl Detection {
    pub fn segments(&self) -> Vec<LineSegment> {
        self.lines.iter().map(|l| l.segment).collect()
    }
}

#[derive(Debug)]
pub struct Pipeline {
    pub canny: Canny,
    pub hough: HoughParams,
    backend: ConvBackend,
}

impl Pipeline {
    pub fn new(canny: Canny, hough: HoughParams, backend: ConvBackend) -> Result<Self, Error> {
        hough.validate()?;
        Ok(Self { canny, hough, backend })
    }

    /// Pipeline on the backend named in `settings`.
    pub fn from_settings(settings: &Settings) -> Result<Self, Error> {
        Self::with_backend(settings, settings.build_backend()?)
    }

    pub fn with_backend(settings: &Settings, backend: ConvBackend) -> Result<Self, Error> {
        settings.validate()?;
        Self::new(
            Canny::new(settings.canny, settings.kernels.clone())?,
            settings.hough,
            backend,
        )
    }

    pub fn backend(&self) -> &ConvBackend {
        &self.backend
    }

    pub fn canny_phase(&mut self, img: &GrayImage, tally: &mut Tally) -> Result<EdgeMap, Error> {
        self.canny.run(img, &mut self.backend, tally)
    }

    pub fn hough_phase(&self, edges: &GrayImage, tally: &mut Tally) -> HoughAccumulator {
        accumulate_counted(edges, &self.hough, &mut tally.work)
    }

    pub fn coordinates_phase(&self, acc: &HoughAccumulator, tally: &mut Tally) -> Vec<DetectedLine> {
        let peaks = find_lines_counted(acc, &self.hough, &mut tally.work);
        lines_from_peaks(&peaks, acc.width, acc.height, &mut tally.work)
    }

    pub fn detect(&mut self, img: &GrayImage) -> Result<Detection, Error> {
        let mut tallies = PhaseTallies::default();
        let edges = self.canny_phase(img, &mut tallies.canny)?;
        let acc = self.hough_phase(&edges.out, &mut tallies.hough);
        let lines = self.coordinates_phase(&acc, &mut tallies.coordinates);
        Ok(Detection { edges, lines, tallies })
    }
}

/// Writes the edge map as `<stem>_edges.pgm` and the overlay as
/// `<stem>_lines.ppm` under `dir`.
pub fn generate_outputs(img: &GrayImage, det: &Detection, dir: &Path, stem: &str) -> Result<(), Error> {
    save_pgm(&det.edges.out, dir.join(format!("{stem}_edges.pgm")))?;
    render_overlay(img, &det.segments(), dir.join(format!("{stem}_lines.ppm")))?;
    Ok(())
}
