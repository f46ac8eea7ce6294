import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageEnhance
enh = ImageEnhance.Contrast(img)
out = enh.enhance(1.5)
